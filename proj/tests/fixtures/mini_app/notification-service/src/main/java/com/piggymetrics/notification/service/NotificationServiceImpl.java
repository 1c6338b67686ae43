package com.piggymetrics.notification.service;

import com.piggymetrics.notification.client.AccountServiceClient;
import org.slf4j.Logger;
import org.slf4j.LoggerFactory;
import org.springframework.beans.factory.annotation.Autowired;
import org.springframework.stereotype.Service;

@Service
public class NotificationServiceImpl {

    private final Logger log = LoggerFactory.getLogger(getClass());

    @Autowired
    private AccountServiceClient client;

    public void sendBackupNotifications(String accountName) {
        String attachment = client.getAccount(accountName);
        log.info("backup notification sent for {}", accountName);
    }
}
