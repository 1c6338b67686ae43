package com.example.shipping;

import org.springframework.amqp.rabbit.annotation.Exchange;
import org.springframework.amqp.rabbit.annotation.Queue;
import org.springframework.amqp.rabbit.annotation.QueueBinding;
import org.springframework.amqp.rabbit.annotation.RabbitListener;
import org.springframework.stereotype.Component;

@Component
public class ShipmentListener {

    @RabbitListener(bindings = @QueueBinding(value = @Queue("shipping"), exchange = @Exchange("orders"), key = "order.created"))
    public void onOrder(String order) {
    }
}
