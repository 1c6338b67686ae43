package com.example.invoice;

import org.springframework.kafka.annotation.KafkaListener;
import org.springframework.stereotype.Component;

@Component
public class InvoiceListener {

    @KafkaListener(topics = "order", groupId = "invoice")
    public void onOrder(String order) {
    }
}
