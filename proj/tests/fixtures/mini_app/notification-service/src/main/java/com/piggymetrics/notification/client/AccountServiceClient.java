package com.piggymetrics.notification.client;

import org.springframework.cloud.openfeign.FeignClient;
import org.springframework.web.bind.annotation.PathVariable;
import org.springframework.web.bind.annotation.RequestMapping;
import org.springframework.web.bind.annotation.RequestMethod;

@FeignClient(name = "account-service")
public interface AccountServiceClient {

    @RequestMapping(method = RequestMethod.GET, value = "/accounts/{accountName}", consumes = "application/json")
    String getAccount(@PathVariable("accountName") String accountName);
}
